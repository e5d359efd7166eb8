fn main() {
    std::process::exit(mscat::cli::main_with(std::env::args_os()));
}
