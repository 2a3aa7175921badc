fn main() {
    std::process::exit(opinion_qc::cli::run(std::env::args_os()));
}
