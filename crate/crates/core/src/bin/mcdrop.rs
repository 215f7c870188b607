fn main() {
    std::process::exit(mcdrop::cli::run(std::env::args_os()));
}
