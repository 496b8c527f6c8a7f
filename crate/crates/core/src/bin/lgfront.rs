fn main() {
    std::process::exit(lgfront::io::cli::run(std::env::args_os()));
}
