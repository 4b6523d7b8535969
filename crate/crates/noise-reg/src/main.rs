fn main() {
    std::process::exit(noise_reg::cli::run(std::env::args_os()));
}
