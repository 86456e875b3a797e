fn main() {
    std::process::exit(roleqe::cli::main_with_args(std::env::args_os()));
}
