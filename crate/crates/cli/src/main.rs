fn main() {
    std::process::exit(benard_cda_cli::main_with_args(std::env::args_os()));
}
