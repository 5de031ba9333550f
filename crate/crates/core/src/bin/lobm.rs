fn main() {
    std::process::exit(lob_momentum::cli::run(std::env::args_os()));
}
