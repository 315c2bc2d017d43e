fn main() {
    std::process::exit(techrank::cli::run(std::env::args_os()));
}
