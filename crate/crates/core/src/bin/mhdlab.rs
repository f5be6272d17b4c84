fn main() {
    std::process::exit(mhdlab::cli::run(std::env::args_os()));
}
