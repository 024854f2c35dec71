fn main() {
    let code = toscert::cli::report(&toscert::cli::run_cli(std::env::args_os()));
    std::process::exit(code);
}
