fn main() {
    std::process::exit(qa_svd::cli::run(std::env::args_os()));
}
