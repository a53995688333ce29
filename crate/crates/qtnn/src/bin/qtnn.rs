fn main() {
    std::process::exit(qtnn::cli::run(std::env::args_os()));
}
