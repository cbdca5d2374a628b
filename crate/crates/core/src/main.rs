fn main() {
    std::process::exit(angular_lab::cli::run(std::env::args_os()));
}
