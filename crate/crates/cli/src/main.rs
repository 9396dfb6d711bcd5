use std::io;
use std::process;

fn main() {
    let code = moran_cli::run_command(std::env::args_os(), &mut io::stdin(), &mut io::stdout(), &mut io::stderr());
    process::exit(code);
}
