fn main() {
    std::process::exit(wheacha::cli::run(std::env::args_os()));
}
