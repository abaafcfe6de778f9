fn main() {
    std::process::exit(mhkz::cli::run(std::env::args_os()));
}
