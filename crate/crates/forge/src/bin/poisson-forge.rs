fn main() {
    let code = poisson_forge::cli::main_with_args(std::env::args_os());
    std::process::exit(code);
}
