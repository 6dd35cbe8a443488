fn main() {
    std::process::exit(quenchlab::cli::main_with_args(std::env::args_os()));
}
