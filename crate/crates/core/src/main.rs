fn main() {
    std::process::exit(dampcode::cli::run(std::env::args_os()));
}
