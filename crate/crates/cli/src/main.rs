fn main() {
    std::process::exit(msmatch::cli::run(std::env::args_os()));
}
