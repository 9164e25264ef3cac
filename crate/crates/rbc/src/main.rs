fn main() {
    std::process::exit(rbc::cli::main_with_args(std::env::args_os()));
}
