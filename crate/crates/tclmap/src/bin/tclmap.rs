fn main() {
    std::process::exit(tclmap::cli::main_with_args(std::env::args_os()));
}
