fn main() {
    std::process::exit(donorchain::cli::main_with_args(std::env::args_os()));
}
