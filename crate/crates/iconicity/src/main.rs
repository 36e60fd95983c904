fn main() {
    std::process::exit(iconicity::cli::run_from(std::env::args_os()));
}
