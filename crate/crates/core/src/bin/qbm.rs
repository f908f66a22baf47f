fn main() {
    std::process::exit(qbm_core::cli::run_from_args(std::env::args_os()));
}
