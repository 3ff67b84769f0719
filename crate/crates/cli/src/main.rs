use std::process::ExitCode;

use cdgafs_cli::{execute, Cli};
use clap::Parser;

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("CDGAFS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("CDGAFS_THREADS must be a positive integer, got {value:?}"))?;
    if threads == 0 {
        anyhow::bail!("CDGAFS_THREADS must be a positive integer, got 0");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| execute(&cli)) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            // some errors already print their source; skip causes repeated verbatim
            let mut message = String::new();
            for cause in err.chain().map(|e| e.to_string()) {
                if message.ends_with(&cause) {
                    continue;
                }
                if !message.is_empty() {
                    message.push_str(": ");
                }
                message.push_str(&cause);
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
