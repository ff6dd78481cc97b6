fn main() {
    std::process::exit(hardy_kernels::run_command(std::env::args_os()));
}
