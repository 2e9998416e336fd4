fn main() {
    std::process::exit(syntaxsplice::cli::run(std::env::args_os()));
}
