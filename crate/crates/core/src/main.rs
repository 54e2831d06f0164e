fn main() {
    std::process::exit(onsetml::cli::run(std::env::args_os()));
}
