fn main() {
    std::process::exit(descimg::cli::run(std::env::args_os()));
}
