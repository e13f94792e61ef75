fn main() {
    std::process::exit(lsw::cli::run(std::env::args_os()));
}
