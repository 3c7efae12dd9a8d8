//! Pairwise FIFO channels between the three parties.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::ring::PartyId;

use super::{wire, Message, PayloadKind};

pub trait Transport: Send {
    fn send(&mut self, to: PartyId, msg: Message) -> Result<()>;
    fn recv(&mut self, from: PartyId, kind: PayloadKind) -> Result<Message>;
}

/// In-process transport over `mpsc` channels.
pub struct SimTransport {
    id: PartyId,
    tx: [Option<Sender<Message>>; 3],
    rx: [Option<Receiver<Message>>; 3],
}

impl SimTransport {
    /// Builds a fully connected triple, indexed by party.
    pub fn triple() -> [SimTransport; 3] {
        let mut out = PartyId::ALL.map(|id| SimTransport {
            id,
            tx: [None, None, None],
            rx: [None, None, None],
        });
        for from in PartyId::ALL {
            for to in PartyId::ALL {
                if from != to {
                    let (s, r) = channel();
                    out[from.index()].tx[to.index()] = Some(s);
                    out[to.index()].rx[from.index()] = Some(r);
                }
            }
        }
        out
    }
}

impl Transport for SimTransport {
    fn send(&mut self, to: PartyId, msg: Message) -> Result<()> {
        let tx = self.tx[to.index()]
            .as_ref()
            .ok_or_else(|| Error::Desync(format!("{} sending to itself", self.id)))?;
        tx.send(msg).map_err(|_| Error::ChannelClosed(to.get()))
    }

    fn recv(&mut self, from: PartyId, _kind: PayloadKind) -> Result<Message> {
        let rx = self.rx[from.index()]
            .as_ref()
            .ok_or_else(|| Error::Desync(format!("{} receiving from itself", self.id)))?;
        rx.recv().map_err(|_| Error::ChannelClosed(from.get()))
    }
}

const MAGIC: &[u8; 8] = b"fpsum\0v1";

struct Peer {
    queue: Option<Sender<Vec<u8>>>,
    writer: Option<JoinHandle<std::io::Result<()>>>,
    reader: BufReader<TcpStream>,
}

/// TCP transport for one party. Each outgoing connection is drained by a
/// writer thread so that sends never block on the peer's reads.
pub struct TcpTransport {
    id: PartyId,
    peers: [Option<Peer>; 3],
}

fn handshake_bytes(id: PartyId, fingerprint: [u8; 8]) -> [u8; 17] {
    let mut b = [0u8; 17];
    b[..8].copy_from_slice(MAGIC);
    b[8] = id.get();
    b[9..].copy_from_slice(&fingerprint);
    b
}

impl TcpTransport {
    /// Connects party `id` to the others. `P_i` listens on its own
    /// endpoint, accepts connections from higher-numbered parties and
    /// dials lower-numbered ones. `fingerprint` must agree across parties.
    pub fn connect(
        id: PartyId,
        endpoints: &[SocketAddr; 3],
        fingerprint: [u8; 8],
        timeout: Duration,
    ) -> Result<Self> {
        let listener = TcpListener::bind(endpoints[id.index()])?;
        Self::connect_with(id, listener, endpoints, fingerprint, timeout)
    }

    pub fn connect_with(
        id: PartyId,
        listener: TcpListener,
        endpoints: &[SocketAddr; 3],
        fingerprint: [u8; 8],
        timeout: Duration,
    ) -> Result<Self> {
        let mut streams: [Option<TcpStream>; 3] = [None, None, None];
        let hello = handshake_bytes(id, fingerprint);
        for peer in PartyId::ALL.into_iter().filter(|p| *p < id) {
            let deadline = Instant::now() + timeout;
            let mut s = loop {
                match TcpStream::connect(endpoints[peer.index()]) {
                    Ok(s) => break s,
                    Err(e) if Instant::now() >= deadline => return Err(e.into()),
                    Err(_) => std::thread::sleep(Duration::from_millis(20)),
                }
            };
            s.set_nodelay(true)?;
            s.write_all(&hello)?;
            let mut back = [0u8; 17];
            s.read_exact(&mut back)?;
            if back != handshake_bytes(peer, fingerprint) {
                return Err(Error::Frame(format!("handshake mismatch with {peer}")));
            }
            streams[peer.index()] = Some(s);
        }
        let higher = PartyId::ALL.into_iter().filter(|p| *p > id).count();
        for _ in 0..higher {
            let (mut s, _) = listener.accept()?;
            s.set_nodelay(true)?;
            let mut got = [0u8; 17];
            s.read_exact(&mut got)?;
            let peer = PartyId::new(got[8])?;
            if peer <= id || got != handshake_bytes(peer, fingerprint) || streams[peer.index()].is_some() {
                return Err(Error::Frame(format!("unexpected handshake from {peer}")));
            }
            s.write_all(&hello)?;
            streams[peer.index()] = Some(s);
        }
        let peers = streams.map(|s| {
            s.map(|s| {
                let (tx, rx) = channel::<Vec<u8>>();
                let out = s.try_clone().expect("clone tcp stream");
                let writer = std::thread::spawn(move || {
                    let mut w = BufWriter::new(out);
                    while let Ok(frame) = rx.recv() {
                        w.write_all(&frame)?;
                        // Flush when the queue momentarily drains.
                        let mut more = true;
                        while more {
                            match rx.try_recv() {
                                Ok(f) => w.write_all(&f)?,
                                Err(_) => more = false,
                            }
                        }
                        w.flush()?;
                    }
                    w.flush()
                });
                Peer {
                    queue: Some(tx),
                    writer: Some(writer),
                    reader: BufReader::new(s),
                }
            })
        });
        Ok(TcpTransport { id, peers })
    }

    fn peer(&mut self, p: PartyId) -> Result<&mut Peer> {
        let id = self.id;
        self.peers[p.index()]
            .as_mut()
            .ok_or_else(|| Error::Desync(format!("{id} has no channel to {p}")))
    }

    /// Flushes and closes the outgoing halves, waiting for the writers.
    pub fn shutdown(&mut self) -> Result<()> {
        for peer in self.peers.iter_mut().flatten() {
            peer.queue.take();
            if let Some(h) = peer.writer.take() {
                h.join().map_err(|_| Error::PartyPanicked)??;
            }
        }
        Ok(())
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, to: PartyId, msg: Message) -> Result<()> {
        let frame = wire::encode(&msg);
        let q = self.peer(to)?.queue.as_ref().ok_or(Error::ChannelClosed(to.get()))?;
        q.send(frame).map_err(|_| Error::ChannelClosed(to.get()))
    }

    fn recv(&mut self, from: PartyId, kind: PayloadKind) -> Result<Message> {
        let r = &mut self.peer(from)?.reader;
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut body = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut body)?;
        wire::decode(&body, kind)
    }
}
