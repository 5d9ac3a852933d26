fn main() {
    std::process::exit(mosaic::cli::run(std::env::args_os()));
}
