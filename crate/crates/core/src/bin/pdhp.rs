fn main() {
    std::process::exit(pdhp::cli::run(std::env::args_os()));
}
