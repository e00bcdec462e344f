fn main() {
    std::process::exit(metric_scale_cli::main_with_args(std::env::args_os()));
}
