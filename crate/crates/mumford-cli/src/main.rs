use std::io::Write;

fn main() {
    let out = mumford_cli::run_args(std::env::args_os().skip(1), &mut std::io::stdin());
    std::io::stdout().write_all(out.stdout.as_bytes()).ok();
    std::io::stderr().write_all(out.stderr.as_bytes()).ok();
    std::process::exit(out.code);
}
