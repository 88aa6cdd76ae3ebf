fn main() {
    std::process::exit(ctrl_dos::cli::run());
}
