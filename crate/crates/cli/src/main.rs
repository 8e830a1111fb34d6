fn main() {
    std::process::exit(hlde::cli::main_from(std::env::args_os()));
}
