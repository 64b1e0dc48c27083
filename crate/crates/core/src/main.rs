fn main() {
    std::process::exit(abguard::cli::run(std::env::args_os()));
}
