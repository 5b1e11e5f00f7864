fn main() {
    std::process::exit(prdist::cli::run(std::env::args_os()));
}
