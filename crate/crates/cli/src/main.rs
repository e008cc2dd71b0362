fn main() {
    std::process::exit(connective_cli::main_with_args(std::env::args_os()));
}
