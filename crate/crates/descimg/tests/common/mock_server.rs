//! A local image-search endpoint for the HTTP provider.
//!
//! `GET /search?q=<url>` answers with `{"items": [...]}`; the result list
//! depends on the site number `NN` in `http://site-NN.example/`:
//!
//! | site      | results                                                 |
//! |-----------|---------------------------------------------------------|
//! | 02        | 7 photos                                                |
//! | 03        | 20 photos, rank 5 stalls past the client timeout         |
//! | 04        | 25 results, ranks 4, 11 and 19 are SVG                   |
//! | 05        | 22 results, rank 2 a 100 px square icon, rank 6 40 px wide |
//! | 99        | search answers 503 with `Retry-After: 7`                 |
//! | others    | 24 photos                                               |
//!
//! `GET /img/<site>/<rank>.jpg` serves a JPEG of the advertised size.

use std::io::Cursor;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use descimg::fetch::placeholder_jpeg;
use descimg::fetch::ProviderConfig;
use serde_json::json;

pub const STALL: Duration = Duration::from_millis(1500);
pub const CLIENT_TIMEOUT: Duration = Duration::from_millis(500);

pub struct MockServer {
    pub base: String,
    pub image_requests: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    workers: Vec<thread::JoinHandle<()>>,
}

struct Item {
    rank: u32,
    width: u32,
    height: u32,
    mime: &'static str,
}

fn items(site: u32) -> Vec<Item> {
    let photo = |rank: u32| Item {
        rank,
        width: 80 + (rank * 37 + site * 11) % 240,
        height: 70 + (rank * 53 + site * 7) % 200,
        mime: "image/jpeg",
    };
    match site {
        2 => (1..=7).map(photo).collect(),
        3 => (1..=20).map(photo).collect(),
        4 => (1..=25)
            .map(|r| match r {
                4 | 11 | 19 => Item {
                    mime: "image/svg+xml",
                    ..photo(r)
                },
                _ => photo(r),
            })
            .collect(),
        5 => (1..=22)
            .map(|r| match r {
                2 => Item {
                    rank: r,
                    width: 100,
                    height: 100,
                    mime: "image/png",
                },
                6 => Item {
                    rank: r,
                    width: 40,
                    height: 120,
                    mime: "image/jpeg",
                },
                _ => photo(r),
            })
            .collect(),
        _ => (1..=24).map(photo).collect(),
    }
}

fn site_number(query: &str) -> Option<u32> {
    let rest = query.split("site-").nth(1)?;
    rest.get(..2)?.parse().ok()
}

fn respond(base: &str, req: tiny_http::Request, image_requests: &AtomicUsize) {
    let url = req.url().to_string();
    let json_header: tiny_http::Header = "Content-Type: application/json".parse().unwrap();
    if let Some(q) = url.strip_prefix("/search?q=") {
        let query: String = url::form_urlencoded::parse(format!("q={q}").as_bytes())
            .next()
            .map(|(_, v)| v.into_owned())
            .unwrap_or_default();
        let Some(site) = site_number(&query) else {
            let _ = req.respond(tiny_http::Response::from_string("bad query").with_status_code(400));
            return;
        };
        if site == 99 {
            let retry: tiny_http::Header = "Retry-After: 7".parse().unwrap();
            let _ = req.respond(
                tiny_http::Response::from_string("busy")
                    .with_status_code(503)
                    .with_header(retry),
            );
            return;
        }
        let body = json!({
            "items": items(site).iter().map(|it| json!({
                "position": it.rank,
                "link": format!("{base}/img/{site:02}/{}.jpg", it.rank),
                "size": {"w": it.width, "h": it.height},
                "type": it.mime,
            })).collect::<Vec<_>>()
        });
        let _ = req.respond(tiny_http::Response::from_string(body.to_string()).with_header(json_header));
        return;
    }
    if let Some(path) = url.strip_prefix("/img/") {
        image_requests.fetch_add(1, Ordering::SeqCst);
        let mut parts = path.trim_end_matches(".jpg").split('/');
        let site: u32 = parts.next().and_then(|s| s.parse().ok()).unwrap_or(0);
        let rank: u32 = parts.next().and_then(|s| s.parse().ok()).unwrap_or(0);
        if site == 3 && rank == 5 {
            thread::sleep(STALL);
        }
        let Some(item) = items(site).into_iter().find(|i| i.rank == rank) else {
            let _ = req.respond(tiny_http::Response::from_string("missing").with_status_code(404));
            return;
        };
        let tint = [(site * 20) as u8, (rank * 9) as u8, 120];
        let bytes = placeholder_jpeg(item.width, item.height, tint);
        let _ = req.respond(tiny_http::Response::new(
            200.into(),
            vec!["Content-Type: image/jpeg".parse().unwrap()],
            Cursor::new(bytes.clone()),
            Some(bytes.len()),
            None,
        ));
        return;
    }
    let _ = req.respond(tiny_http::Response::from_string("not found").with_status_code(404));
}

impl MockServer {
    pub fn start() -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let base = format!("http://127.0.0.1:{port}");
        let image_requests = Arc::new(AtomicUsize::new(0));
        let workers = (0..12)
            .map(|_| {
                let server = Arc::clone(&server);
                let base = base.clone();
                let counter = Arc::clone(&image_requests);
                thread::spawn(move || {
                    while let Ok(req) = server.recv() {
                        respond(&base, req, &counter);
                    }
                })
            })
            .collect();
        Self {
            base,
            image_requests,
            server,
            workers,
        }
    }

    pub fn provider_config(&self) -> ProviderConfig {
        toml::from_str(&format!(
            r#"
            endpoint = "{}/search?q={{query}}"
            results = "/items"
            [fields]
            rank = "/position"
            url = "/link"
            width = "/size/w"
            height = "/size/h"
            mime = "/type"
            "#,
            self.base
        ))
        .expect("provider config")
    }

    pub fn image_requests(&self) -> usize {
        self.image_requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        for _ in 1..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Twelve test-split sites `site_01` ... `site_12`.
pub fn manifest_csv() -> String {
    let mut s = String::from("site_id,url,label,split,language,screenshot_path,text_path\n");
    let labels = ["machinery", "music", "sport", "tourism"];
    for i in 1..=12 {
        s.push_str(&format!(
            "site_{i:02},http://site-{i:02}.example/,{},test,,,\n",
            labels[i % 4]
        ));
    }
    s
}
