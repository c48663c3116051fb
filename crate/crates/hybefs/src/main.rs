//! Binary entry point; all behavior lives in [`hybefs::cli`].

fn main() {
    std::process::exit(hybefs::cli::run_from(std::env::args_os()));
}
