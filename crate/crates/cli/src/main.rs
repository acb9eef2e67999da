fn main() {
    std::process::exit(coreg_cli::run(std::env::args_os()));
}
