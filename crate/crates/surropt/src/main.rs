fn main() {
    std::process::exit(surropt::cli::run(std::env::args_os()));
}
