fn main() {
    std::process::exit(ruling::cli::run(std::env::args_os()));
}
