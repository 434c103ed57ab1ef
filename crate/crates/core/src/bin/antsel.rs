fn main() {
    std::process::exit(antsel::cli::main_with_args(std::env::args_os()));
}
