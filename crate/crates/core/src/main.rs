fn main() {
    std::process::exit(rampqss::cli::run(std::env::args_os()));
}
