//! Text formats: detections (`frame_index,x,y`), tracks
//! (`track_id,frame_index,x,y`) and matching-vector dumps.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::geometry::Position;
use crate::matching::MatchingVector;
use crate::metrics::csv_error;
use crate::trajectory::{Detection, TrajectorySet};

const DETECTION_HEADER: [&str; 3] = ["frame_index", "x", "y"];
const TRACK_HEADER: [&str; 4] = ["track_id", "frame_index", "x", "y"];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct DetectionRow {
    frame_index: usize,
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct TrackRow {
    track_id: usize,
    frame_index: usize,
    x: f64,
    y: f64,
}

fn reader<R: Read>(r: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let found = rdr.headers().map_err(csv_error)?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header '{}', found '{}'", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(rdr)
}

fn rows<R: Read, T: serde::de::DeserializeOwned>(rdr: &mut csv::Reader<R>) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: T = rec.deserialize(None).map_err(|e| Error::Parse {
            line,
            message: format!("{e}"),
        })?;
        out.push((line, row));
    }
    Ok(out)
}

fn finite(line: usize, x: f64, y: f64) -> Result<Position> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::Parse {
            line,
            message: format!("non-finite coordinate ({x}, {y})"),
        });
    }
    Ok(Position::new(x, y))
}

/// Reads detections. Rows must come in non-decreasing frame order; a frame
/// index that is skipped is an empty frame.
pub fn read_detections<R: Read>(r: R, dt: f64) -> Result<FrameSequence> {
    let mut rdr = reader(r, &DETECTION_HEADER)?;
    let mut frames: Vec<Vec<Position>> = Vec::new();
    for (line, row) in rows::<_, DetectionRow>(&mut rdr)? {
        let p = finite(line, row.x, row.y)?;
        if row.frame_index + 1 < frames.len() {
            return Err(Error::Parse {
                line,
                message: format!("frame {} comes after frame {}", row.frame_index, frames.len() - 1),
            });
        }
        if row.frame_index >= frames.len() {
            frames.resize_with(row.frame_index + 1, Vec::new);
        }
        frames[row.frame_index].push(p);
    }
    FrameSequence::with_dt(frames, dt)
}

pub fn write_detections<W: Write>(seq: &FrameSequence, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (k, frame) in seq.frames().iter().enumerate() {
        for p in frame {
            out.serialize(DetectionRow {
                frame_index: k,
                x: p.x,
                y: p.y,
            })
            .map_err(csv_error)?;
        }
    }
    if seq.total_detections() == 0 {
        out.write_record(DETECTION_HEADER).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes tracks with ids `1..` in the set's order.
pub fn write_tracks<W: Write>(seq: &FrameSequence, tracks: &TrajectorySet, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (id, track) in tracks.tracks().iter().enumerate() {
        for d in track {
            let p = seq.frame(d.frame)[d.object];
            out.serialize(TrackRow {
                track_id: id + 1,
                frame_index: d.frame,
                x: p.x,
                y: p.y,
            })
            .map_err(csv_error)?;
        }
    }
    if tracks.is_empty() {
        out.write_record(TRACK_HEADER).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Tracks as read from a file: per track id (in order of first
/// appearance), its `(line, frame, position)` rows sorted by frame.
#[derive(Debug, Clone)]
pub struct TrackFile {
    tracks: Vec<(usize, Vec<TrackFileRow>)>,
}

/// `(line, frame, position)`.
type TrackFileRow = (usize, usize, Position);

pub fn read_tracks<R: Read>(r: R) -> Result<TrackFile> {
    let mut rdr = reader(r, &TRACK_HEADER)?;
    let mut order = Vec::new();
    let mut by_id: HashMap<usize, Vec<(usize, usize, Position)>> = HashMap::new();
    for (line, row) in rows::<_, TrackRow>(&mut rdr)? {
        let p = finite(line, row.x, row.y)?;
        by_id
            .entry(row.track_id)
            .or_insert_with(|| {
                order.push(row.track_id);
                Vec::new()
            })
            .push((line, row.frame_index, p));
    }
    let tracks = order
        .into_iter()
        .map(|id| {
            let mut rows = by_id.remove(&id).unwrap_or_default();
            rows.sort_by_key(|r| r.1);
            (id, rows)
        })
        .collect();
    Ok(TrackFile { tracks })
}

fn key(frame: usize, p: &Position) -> (usize, u64, u64) {
    (frame, p.x.to_bits(), p.y.to_bits())
}

impl TrackFile {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// The detections of every frame, numbered in file order, and the tracks
    /// over them.
    pub fn to_sequence(&self, dt: f64) -> Result<(FrameSequence, TrajectorySet)> {
        let mut rows: Vec<(usize, usize, usize, Position)> = self
            .tracks
            .iter()
            .enumerate()
            .flat_map(|(t, (_, r))| r.iter().map(move |&(line, f, p)| (line, t, f, p)))
            .collect();
        rows.sort_by_key(|r| r.0);
        let n_frames = rows.iter().map(|r| r.2 + 1).max().unwrap_or(0);
        let mut frames = vec![Vec::new(); n_frames];
        let mut tracks = vec![Vec::new(); self.tracks.len()];
        for (_, t, f, p) in rows {
            tracks[t].push(Detection {
                frame: f,
                object: frames[f].len(),
            });
            frames[f].push(p);
        }
        for t in &mut tracks {
            t.sort();
        }
        let seq = FrameSequence::with_dt(frames, dt)?;
        Ok((seq, TrajectorySet::new(tracks)?))
    }

    /// Tracks over the detections of `seq`, identified by frame and exact
    /// coordinates. Every detection of `seq` must be covered exactly once.
    pub fn resolve(&self, seq: &FrameSequence) -> Result<TrajectorySet> {
        let mut index: HashMap<(usize, u64, u64), VecDeque<usize>> = HashMap::new();
        for (k, frame) in seq.frames().iter().enumerate() {
            for (i, p) in frame.iter().enumerate() {
                index.entry(key(k, p)).or_default().push_back(i);
            }
        }
        let mut present: BTreeMap<usize, usize> = BTreeMap::new();
        let mut tracks = Vec::with_capacity(self.tracks.len());
        for (id, rows) in &self.tracks {
            let mut track = Vec::with_capacity(rows.len());
            for &(line, f, p) in rows {
                let object = index
                    .get_mut(&key(f, &p))
                    .and_then(VecDeque::pop_front)
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("track {id}: no unused detection at ({}, {}) in frame {f}", p.x, p.y),
                    })?;
                *present.entry(f).or_default() += 1;
                track.push(Detection { frame: f, object });
            }
            tracks.push(track);
        }
        for (k, frame) in seq.frames().iter().enumerate() {
            let got = present.get(&k).copied().unwrap_or(0);
            if got == 0 && !frame.is_empty() {
                return Err(Error::input(format!("frame {k} is missing from the tracks")));
            }
            if got != frame.len() {
                return Err(Error::input(format!(
                    "frame {k}: tracks cover {got} of {} detections",
                    frame.len()
                )));
            }
        }
        TrajectorySet::new(tracks)
    }
}

/// One line per frame pair, entries separated by spaces, `-1` for a
/// departure.
pub fn write_matchings<W: Write>(matchings: &[MatchingVector], mut w: W) -> Result<()> {
    for m in matchings {
        writeln!(w, "{m}")?;
    }
    Ok(())
}

pub fn read_matchings<R: BufRead>(r: R, counts: &[usize]) -> Result<Vec<MatchingVector>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let entries = line
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|e| parse_err(format!("'{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let n_next = *counts
            .get(i + 1)
            .ok_or_else(|| parse_err(format!("more matching lines than the {} frame pairs", counts.len().saturating_sub(1))))?;
        if entries.len() != counts[i] {
            return Err(parse_err(format!("{} entries for {} objects", entries.len(), counts[i])));
        }
        out.push(MatchingVector::from_signed(&entries, n_next).map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::assemble_trajectories;

    const SAMPLE: &str = "frame_index,x,y\n0,1.5,2\n0,3,4\n1,1.75,2.5\n3,9,9\n";

    #[test]
    fn detections_round_trip() {
        let seq = read_detections(SAMPLE.as_bytes(), 1.0).unwrap();
        assert_eq!(seq.counts(), vec![2, 1, 0, 1]);
        let mut buf = Vec::new();
        write_detections(&seq, &mut buf).unwrap();
        let again = read_detections(&buf[..], 1.0).unwrap();
        assert_eq!(seq, again);
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "frame_index,x,y\n0,1,2\n0,abc,4\n";
        match read_detections(text.as_bytes(), 1.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "frame_index,x,y\n1,1,2\n0,1,4\n";
        assert!(matches!(read_detections(text.as_bytes(), 1.0), Err(Error::Parse { line: 3, .. })));
        let text = "frame,x,y\n0,1,2\n";
        assert!(matches!(read_detections(text.as_bytes(), 1.0), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn tracks_round_trip() {
        let seq = read_detections(SAMPLE.as_bytes(), 1.0).unwrap();
        let ms = vec![
            MatchingVector::from_signed(&[-1, 1], 1).unwrap(),
            MatchingVector::from_signed(&[-1], 0).unwrap(),
            MatchingVector::default(),
        ];
        let set = assemble_trajectories(&seq, &ms).unwrap();
        let mut buf = Vec::new();
        write_tracks(&seq, &set, &mut buf).unwrap();
        let file = read_tracks(&buf[..]).unwrap();
        assert_eq!(file.resolve(&seq).unwrap(), set);
        let (seq2, set2) = file.to_sequence(1.0).unwrap();
        assert_eq!(seq2.total_detections(), 4);
        assert_eq!(set2.len(), set.len());
    }

    #[test]
    fn missing_frame_is_an_error() {
        let seq = read_detections(SAMPLE.as_bytes(), 1.0).unwrap();
        let text = "track_id,frame_index,x,y\n1,0,1.5,2\n2,0,3,4\n2,1,1.75,2.5\n";
        let err = read_tracks(text.as_bytes()).unwrap().resolve(&seq).unwrap_err();
        assert!(err.to_string().contains("frame 3"));
    }

    #[test]
    fn matchings_round_trip() {
        let ms = vec![
            MatchingVector::from_signed(&[2, -1], 2).unwrap(),
            MatchingVector::from_signed(&[-1, 1], 3).unwrap(),
        ];
        let mut buf = Vec::new();
        write_matchings(&ms, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2 -1\n-1 1\n");
        assert_eq!(read_matchings(&buf[..], &[2, 2, 3]).unwrap(), ms);
        assert!(read_matchings("1 1\n".as_bytes(), &[2, 2]).is_err());
    }
}
