//! `WTNSPKT1` encoding. All integers are big-endian.
//!
//! ```text
//! magic[8] version u8
//! section* : len u32 ‖ body     (header, samples, checkpoints, log,
//!                                anchors, dual-source, attestation)
//! ```
//!
//! VDF group elements are written at the fixed width of the modulus named by
//! the header's `vdf_params_id`. Every section body must be consumed exactly.

use num_bigint::BigUint;

use super::{Attestation, EvidencePacket, PacketError, PacketHeader};
use crate::anchors::{AnchorSet, CalendarProof, TsaAnchor, TsaReceipt, TsaRequest, RECEIPT_LEN};
use crate::evidence_log::{PathStep, Side};
use crate::input_model::MatchSummary;
use crate::jitter_seal::{JitterSample, SessionParams, SAMPLE_LEN};
use crate::vdf::{lookup_params, VdfCheckpoint, VdfProof};

pub const PACKET_MAGIC: &[u8; 8] = b"WTNSPKT1";
pub const FORMAT_VERSION: u8 = 1;

fn element_width(params_id: &str) -> Result<usize, PacketError> {
    lookup_params(params_id)
        .map(|p| p.element_len())
        .map_err(|_| PacketError::UnknownParams(params_id.to_string()))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.0.extend_from_slice(v);
    }
    fn count(&mut self, n: usize) -> Result<(), PacketError> {
        self.u32(u32::try_from(n).map_err(|_| PacketError::Malformed("too many entries"))?);
        Ok(())
    }
    fn short_str(&mut self, s: &str) -> Result<(), PacketError> {
        self.u8(u8::try_from(s.len()).map_err(|_| PacketError::Malformed("string longer than 255 bytes"))?);
        self.bytes(s.as_bytes());
        Ok(())
    }
    fn element(&mut self, v: &BigUint, width: usize) -> Result<(), PacketError> {
        let b = v.to_bytes_be();
        if b.len() > width {
            return Err(PacketError::ElementTooWide);
        }
        self.0.resize(self.0.len() + width - b.len(), 0);
        self.bytes(&b);
        Ok(())
    }
    fn section(&mut self, f: impl FnOnce(&mut Writer) -> Result<(), PacketError>) -> Result<(), PacketError> {
        let mut body = Writer(Vec::new());
        f(&mut body)?;
        self.count(body.0.len())?;
        self.bytes(&body.0);
        Ok(())
    }
}

pub fn serialize(p: &EvidencePacket) -> Result<Vec<u8>, PacketError> {
    let mut w = Writer(Vec::with_capacity(256 + p.samples.len() * SAMPLE_LEN));
    w.bytes(PACKET_MAGIC);
    w.u8(FORMAT_VERSION);
    w.section(|w| write_header(w, &p.header))?;
    w.section(|w| {
        w.count(p.samples.len())?;
        p.samples.iter().for_each(|s| w.bytes(&s.to_bytes()));
        Ok(())
    })?;
    w.section(|w| write_checkpoints(w, &p.header.vdf_params_id, &p.checkpoints))?;
    w.section(|w| {
        w.bytes(&p.mmr_root);
        w.u64(p.leaf_count);
        w.bytes(&p.final_doc_hash);
        Ok(())
    })?;
    w.section(|w| write_anchors(w, &p.anchors))?;
    w.section(|w| {
        match &p.dual_source {
            None => w.u8(0),
            Some(s) => {
                w.u8(1);
                w.u64(s.validated);
                w.u64(s.injected_suspect);
                w.u64(s.device_only);
            }
        }
        Ok(())
    })?;
    w.section(|w| {
        match p.attestation {
            Attestation::Unattested => w.u8(0),
        }
        Ok(())
    })?;
    Ok(w.0)
}

fn write_header(w: &mut Writer, h: &PacketHeader) -> Result<(), PacketError> {
    w.bytes(&h.session_id);
    w.u64(h.session_epoch_us);
    w.u64(h.params.sample_interval);
    w.u32(h.params.jitter_min_us);
    w.u32(h.params.jitter_max_us);
    w.short_str(&h.vdf_params_id)?;
    w.u16(h.zone_map_version);
    w.u8(h.content_kind);
    Ok(())
}

fn write_checkpoints(w: &mut Writer, params_id: &str, cps: &[VdfCheckpoint]) -> Result<(), PacketError> {
    w.count(cps.len())?;
    if cps.is_empty() {
        return Ok(());
    }
    let width = element_width(params_id)?;
    for cp in cps {
        if cp.params_id != params_id {
            return Err(PacketError::Malformed("checkpoint parameters differ from header"));
        }
        w.u64(cp.index);
        w.u64(cp.sample_count);
        w.bytes(&cp.chain_binding);
        w.element(&cp.proof.input_x, width)?;
        w.element(&cp.proof.output_y, width)?;
        w.u16(u16::try_from(cp.proof.midpoints.len()).map_err(|_| PacketError::Malformed("too many midpoints"))?);
        for mu in &cp.proof.midpoints {
            w.element(mu, width)?;
        }
    }
    Ok(())
}

fn write_anchors(w: &mut Writer, a: &AnchorSet) -> Result<(), PacketError> {
    w.u64(a.local_claim_time_us);
    w.count(a.tsa.len())?;
    for t in &a.tsa {
        let req = t.request.to_bytes();
        w.u16(u16::try_from(req.len()).map_err(|_| PacketError::Malformed("TSA request too long"))?);
        w.bytes(&req);
        w.bytes(&t.receipt.to_bytes());
    }
    w.count(a.calendar.len())?;
    for c in &a.calendar {
        w.bytes(&c.digest);
        w.u8(u8::try_from(c.path.len()).map_err(|_| PacketError::Malformed("calendar path too long"))?);
        for step in &c.path {
            w.u8(match step.side {
                Side::Left => 0,
                Side::Right => 1,
            });
            w.bytes(&step.hash);
        }
        w.bytes(&c.pseudo_anchor_id);
        w.u64(c.anchor_time_us);
    }
    Ok(())
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PacketError> {
        if self.0.len() < n {
            return Err(PacketError::Truncated);
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N], PacketError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8, PacketError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, PacketError> {
        self.array().map(u16::from_be_bytes)
    }
    fn u32(&mut self) -> Result<u32, PacketError> {
        self.array().map(u32::from_be_bytes)
    }
    fn u64(&mut self) -> Result<u64, PacketError> {
        self.array().map(u64::from_be_bytes)
    }
    /// A count of entries at least `min_entry` bytes each; rejects counts the
    /// remaining input cannot hold before anything is allocated.
    fn count(&mut self, min_entry: usize) -> Result<usize, PacketError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_entry) > self.0.len() {
            return Err(PacketError::Truncated);
        }
        Ok(n)
    }
    fn short_str(&mut self) -> Result<String, PacketError> {
        let len = self.u8()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| PacketError::Malformed("string is not UTF-8"))
    }
    fn element(&mut self, width: usize) -> Result<BigUint, PacketError> {
        Ok(BigUint::from_bytes_be(self.take(width)?))
    }
    /// Runs `f` over the next length-prefixed section, which it must consume.
    fn section<T>(&mut self, f: impl FnOnce(&mut Reader<'a>) -> Result<T, PacketError>) -> Result<T, PacketError> {
        let len = self.u32()? as usize;
        let mut body = Reader(self.take(len)?);
        let value = f(&mut body)?;
        if !body.0.is_empty() {
            return Err(PacketError::Malformed("section has unread bytes"));
        }
        Ok(value)
    }
}

/// Strict parse: the buffer must hold exactly one packet.
pub fn deserialize(bytes: &[u8]) -> Result<EvidencePacket, PacketError> {
    let mut r = Reader(bytes);
    let magic = r.take(PACKET_MAGIC.len()).map_err(|_| PacketError::BadMagic)?;
    if magic != PACKET_MAGIC {
        return Err(PacketError::BadMagic);
    }
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(PacketError::UnknownVersion(version));
    }
    let header = r.section(read_header)?;
    let samples = r.section(|r| {
        let n = r.count(SAMPLE_LEN)?;
        (0..n)
            .map(|_| r.array::<SAMPLE_LEN>().map(|b| JitterSample::from_bytes(&b)))
            .collect()
    })?;
    let checkpoints = r.section(|r| read_checkpoints(r, &header.vdf_params_id))?;
    let (mmr_root, leaf_count, final_doc_hash) = r.section(|r| Ok((r.array()?, r.u64()?, r.array()?)))?;
    let anchors = r.section(read_anchors)?;
    let dual_source = r.section(|r| match r.u8()? {
        0 => Ok(None),
        1 => Ok(Some(MatchSummary {
            validated: r.u64()?,
            injected_suspect: r.u64()?,
            device_only: r.u64()?,
        })),
        _ => Err(PacketError::Malformed("dual-source flag")),
    })?;
    let attestation = r.section(|r| match r.u8()? {
        0 => Ok(Attestation::Unattested),
        _ => Err(PacketError::Malformed("unknown attestation kind")),
    })?;
    if !r.0.is_empty() {
        return Err(PacketError::TrailingBytes(r.0.len()));
    }
    Ok(EvidencePacket {
        header,
        samples,
        checkpoints,
        mmr_root,
        leaf_count,
        final_doc_hash,
        anchors,
        dual_source,
        attestation,
    })
}

fn read_header(r: &mut Reader) -> Result<PacketHeader, PacketError> {
    Ok(PacketHeader {
        session_id: r.array()?,
        session_epoch_us: r.u64()?,
        params: SessionParams {
            sample_interval: r.u64()?,
            jitter_min_us: r.u32()?,
            jitter_max_us: r.u32()?,
        },
        vdf_params_id: r.short_str()?,
        zone_map_version: r.u16()?,
        content_kind: r.u8()?,
    })
}

fn read_checkpoints(r: &mut Reader, params_id: &str) -> Result<Vec<VdfCheckpoint>, PacketError> {
    let n = r.count(8 + 8 + 32 + 2)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let width = element_width(params_id)?;
    (0..n)
        .map(|_| {
            let index = r.u64()?;
            let sample_count = r.u64()?;
            let chain_binding = r.array()?;
            let input_x = r.element(width)?;
            let output_y = r.element(width)?;
            let m = r.u16()? as usize;
            let midpoints = (0..m).map(|_| r.element(width)).collect::<Result<_, _>>()?;
            Ok(VdfCheckpoint {
                index,
                sample_count,
                chain_binding,
                params_id: params_id.to_string(),
                proof: VdfProof {
                    input_x,
                    output_y,
                    midpoints,
                },
            })
        })
        .collect()
}

fn read_anchors(r: &mut Reader) -> Result<AnchorSet, PacketError> {
    let local_claim_time_us = r.u64()?;
    let n = r.count(2 + RECEIPT_LEN)?;
    let tsa = (0..n)
        .map(|_| {
            let len = r.u16()? as usize;
            let request = TsaRequest::from_bytes(r.take(len)?).map_err(|_| PacketError::Malformed("TSA request"))?;
            let receipt = TsaReceipt::from_bytes(r.take(RECEIPT_LEN)?).map_err(|_| PacketError::Malformed("TSA receipt"))?;
            Ok(TsaAnchor { request, receipt })
        })
        .collect::<Result<_, PacketError>>()?;
    let n = r.count(32 + 1 + 32 + 8)?;
    let calendar = (0..n)
        .map(|_| {
            let digest = r.array()?;
            let steps = r.u8()? as usize;
            let path = (0..steps)
                .map(|_| {
                    let side = match r.u8()? {
                        0 => Side::Left,
                        1 => Side::Right,
                        _ => return Err(PacketError::Malformed("calendar path side")),
                    };
                    Ok(PathStep { side, hash: r.array()? })
                })
                .collect::<Result<_, _>>()?;
            Ok(CalendarProof {
                digest,
                path,
                pseudo_anchor_id: r.array()?,
                anchor_time_us: r.u64()?,
            })
        })
        .collect::<Result<_, PacketError>>()?;
    Ok(AnchorSet {
        tsa,
        calendar,
        local_claim_time_us,
    })
}
