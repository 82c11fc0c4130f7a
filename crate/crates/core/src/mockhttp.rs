//! Test-only single-threaded HTTP server: answers a fixed queue of canned
//! responses and captures each request for inspection.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;

pub(crate) struct CapturedRequest {
    /// Request line plus headers, verbatim.
    pub head: String,
    pub body: String,
}

pub(crate) struct MockServer {
    url: String,
    requests: mpsc::Receiver<CapturedRequest>,
    handle: Option<thread::JoinHandle<()>>,
}

/// Starts a server that serves the queued `(status, body)` responses in
/// order, one connection each, then exits. Queue exactly as many responses
/// as requests the test will make, or `finish` will block.
pub(crate) fn serve(responses: Vec<(u16, String)>) -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind test listener");
    let url = format!("http://{}", listener.local_addr().expect("local addr"));
    let (tx, rx) = mpsc::channel();
    let handle = thread::spawn(move || {
        for (status, body) in responses {
            let Ok((mut stream, _)) = listener.accept() else { return };
            if let Some(request) = read_request(&mut stream) {
                let _ = tx.send(request);
            }
            write_response(&mut stream, status, &body);
            let _ = stream.shutdown(std::net::Shutdown::Both);
        }
    });
    MockServer { url, requests: rx, handle: Some(handle) }
}

impl MockServer {
    pub(crate) fn url(&self) -> &str {
        &self.url
    }

    /// Waits for every queued response to be consumed and returns the
    /// captured requests in arrival order.
    pub(crate) fn finish(mut self) -> Vec<CapturedRequest> {
        if let Some(handle) = self.handle.take() {
            handle.join().expect("mock server thread");
        }
        self.requests.try_iter().collect()
    }
}

fn read_request(stream: &mut TcpStream) -> Option<CapturedRequest> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut head = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        if line == "\r\n" || line == "\n" {
            break;
        }
        head.push_str(&line);
    }
    let content_length = head
        .lines()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            if name.eq_ignore_ascii_case("content-length") {
                value.trim().parse::<usize>().ok()
            } else {
                None
            }
        })
        .unwrap_or(0);
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    Some(CapturedRequest { head, body: String::from_utf8_lossy(&body).into_owned() })
}

fn write_response(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Response",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}
