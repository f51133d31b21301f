use clap::Parser;

use dca_service::api::{router, AppState};
use dca_service::cli::{run, Cli, Command};
use dca_service::store::Store;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Command::Serve { port, host, store } = &cli.command {
        std::process::exit(serve(host, *port, &store.store_path));
    }
    let code = run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

fn serve(host: &str, port: u16, store_path: &std::path::Path) -> i32 {
    let store = match Store::open(store_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return 2;
        }
    };
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    runtime.block_on(async move {
        let app = router(AppState::new(store));
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error[io-error]: bind {host}:{port}: {e}");
                return 2;
            }
        };
        eprintln!(
            "listening on {}",
            listener
                .local_addr()
                .map(|a| a.to_string())
                .unwrap_or_default()
        );
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match axum::serve(listener, app)
            .with_graceful_shutdown(shutdown)
            .await
        {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error[io-error]: {e}");
                2
            }
        }
    })
}
