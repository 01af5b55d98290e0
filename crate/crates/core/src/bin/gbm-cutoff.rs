fn main() {
    std::process::exit(gbm_cutoff::cli::main_with_args(std::env::args_os()));
}
