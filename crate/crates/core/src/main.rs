fn main() {
    std::process::exit(qholo::cli::run(std::env::args_os()));
}
