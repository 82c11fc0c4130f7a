//! Binary persistence for a built [`Retriever`]: parameters, document ids
//! and texts, the inverted index, and the embedding matrix in one file.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::bm25::{BmParams, InvertedIndex, Posting};
use super::dense::{Embedder, VectorStore};
use super::fuse::{FuseParams, Reranker};
use super::{RetrievalError, RetrievalParams, Retriever};

const MAGIC: &[u8; 4] = b"FRIX";
const VERSION: u8 = 1;

/// Upper bound on any single length field; larger values mean corruption.
const MAX_FIELD_LEN: u32 = 1 << 30;

fn write_string<W: Write>(writer: &mut W, value: &str) -> Result<(), RetrievalError> {
    writer.write_u32::<LittleEndian>(value.len() as u32)?;
    writer.write_all(value.as_bytes())?;
    Ok(())
}

fn read_len<R: Read>(reader: &mut R, what: &str) -> Result<u32, RetrievalError> {
    let len = reader.read_u32::<LittleEndian>()?;
    if len > MAX_FIELD_LEN {
        return Err(RetrievalError::Corrupt(format!("{what} length {len} is implausible")));
    }
    Ok(len)
}

fn read_string<R: Read>(reader: &mut R, what: &str) -> Result<String, RetrievalError> {
    let len = read_len(reader, what)?;
    let mut bytes = vec![0u8; len as usize];
    reader.read_exact(&mut bytes)?;
    String::from_utf8(bytes)
        .map_err(|_| RetrievalError::Corrupt(format!("{what} is not valid UTF-8")))
}

impl Retriever {
    /// Serializes the full index to `writer`.
    pub fn save<W: Write>(&self, writer: &mut W) -> Result<(), RetrievalError> {
        writer.write_all(MAGIC)?;
        writer.write_u8(VERSION)?;

        writer.write_f64::<LittleEndian>(self.params.bm25.k1)?;
        writer.write_f64::<LittleEndian>(self.params.bm25.b)?;
        writer.write_f64::<LittleEndian>(self.params.fuse.alpha)?;
        writer.write_f64::<LittleEndian>(self.params.fuse.beta)?;
        writer.write_f64::<LittleEndian>(self.params.fuse.k)?;
        writer.write_u32::<LittleEndian>(self.params.channel_depth as u32)?;
        writer.write_u32::<LittleEndian>(self.params.rerank_depth as u32)?;
        writer.write_u32::<LittleEndian>(self.store.dim() as u32)?;

        writer.write_u32::<LittleEndian>(self.ids.len() as u32)?;
        for (i, id) in self.ids.iter().enumerate() {
            write_string(writer, id)?;
            write_string(writer, &self.texts[i])?;
            writer.write_u32::<LittleEndian>(self.index.doc_len[i])?;
        }
        writer.write_f64::<LittleEndian>(self.index.avg_len)?;

        writer.write_u32::<LittleEndian>(self.index.postings.len() as u32)?;
        for (term, postings) in &self.index.postings {
            write_string(writer, term)?;
            writer.write_u32::<LittleEndian>(postings.len() as u32)?;
            for posting in postings {
                writer.write_u32::<LittleEndian>(posting.doc)?;
                writer.write_u32::<LittleEndian>(posting.tf)?;
            }
        }

        writer.write_u32::<LittleEndian>(self.store.len() as u32)?;
        for value in self.store.raw() {
            writer.write_f32::<LittleEndian>(*value)?;
        }
        Ok(())
    }

    /// Serializes the full index to a file at `path`.
    pub fn save_to_file<P: AsRef<Path>>(&self, path: P) -> Result<(), RetrievalError> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        self.save(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    /// Reads an index back, attaching the given embedder (for queries) and
    /// reranker. The embedder must produce vectors of the stored dimension.
    pub fn load<R: Read>(
        reader: &mut R,
        embedder: Box<dyn Embedder>,
        reranker: Box<dyn Reranker>,
    ) -> Result<Retriever, RetrievalError> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(RetrievalError::BadMagic);
        }
        let version = reader.read_u8()?;
        if version != VERSION {
            return Err(RetrievalError::UnsupportedVersion(version));
        }

        let params = RetrievalParams {
            bm25: BmParams {
                k1: reader.read_f64::<LittleEndian>()?,
                b: reader.read_f64::<LittleEndian>()?,
            },
            fuse: FuseParams {
                alpha: reader.read_f64::<LittleEndian>()?,
                beta: reader.read_f64::<LittleEndian>()?,
                k: reader.read_f64::<LittleEndian>()?,
            },
            channel_depth: reader.read_u32::<LittleEndian>()? as usize,
            rerank_depth: reader.read_u32::<LittleEndian>()? as usize,
        };
        let dim = reader.read_u32::<LittleEndian>()? as usize;
        if embedder.dim() != dim {
            return Err(RetrievalError::DimensionMismatch { expected: dim, got: embedder.dim() });
        }

        let n_docs = read_len(reader, "document count")? as usize;
        let mut ids = Vec::with_capacity(n_docs);
        let mut texts = Vec::with_capacity(n_docs);
        let mut doc_len = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            ids.push(read_string(reader, "document id")?);
            texts.push(read_string(reader, "document text")?);
            doc_len.push(reader.read_u32::<LittleEndian>()?);
        }
        let avg_len = reader.read_f64::<LittleEndian>()?;

        let n_terms = read_len(reader, "term count")? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_string(reader, "term")?;
            let n_postings = read_len(reader, "posting count")? as usize;
            let mut list = Vec::with_capacity(n_postings);
            for _ in 0..n_postings {
                let doc = reader.read_u32::<LittleEndian>()?;
                let tf = reader.read_u32::<LittleEndian>()?;
                if doc as usize >= n_docs {
                    return Err(RetrievalError::Corrupt(format!(
                        "posting for {term:?} points at document {doc} of {n_docs}"
                    )));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }

        let n_rows = read_len(reader, "vector row count")? as usize;
        if n_rows != n_docs {
            return Err(RetrievalError::Corrupt(format!(
                "index has {n_docs} documents but {n_rows} vectors"
            )));
        }
        let mut data = Vec::with_capacity(n_rows * dim);
        for _ in 0..n_rows * dim {
            data.push(reader.read_f32::<LittleEndian>()?);
        }

        let index = InvertedIndex { postings, doc_len, avg_len, params: params.bm25 };
        let store = VectorStore::from_rows(dim, data)?;
        Ok(Retriever { ids, texts, index, store, embedder, reranker, params })
    }

    /// Reads an index back from a file at `path`.
    pub fn load_from_file<P: AsRef<Path>>(
        path: P,
        embedder: Box<dyn Embedder>,
        reranker: Box<dyn Reranker>,
    ) -> Result<Retriever, RetrievalError> {
        let file = std::fs::File::open(path)?;
        let mut reader = std::io::BufReader::new(file);
        Retriever::load(&mut reader, embedder, reranker)
    }

    /// Reads an index back with the built-in deterministic stack: the
    /// hashed-ngram embedder and the rarity-weighted overlap reranker, with
    /// token statistics rebuilt from the stored document texts.
    pub fn load_default<R: Read>(reader: &mut R) -> Result<Retriever, RetrievalError> {
        let mut retriever = Retriever::load(
            reader,
            Box::new(super::dense::HashedNgramEmbedder::default()),
            Box::new(super::fuse::TokenOverlapReranker),
        )?;
        retriever.reranker = Box::new(super::fuse::RarityWeightedReranker::from_texts(
            retriever.texts.iter().map(String::as_str),
        ));
        Ok(retriever)
    }

    /// Reads an index back from a file at `path` with the built-in stack.
    pub fn load_default_from_file<P: AsRef<Path>>(path: P) -> Result<Retriever, RetrievalError> {
        let file = std::fs::File::open(path)?;
        let mut reader = std::io::BufReader::new(file);
        Retriever::load_default(&mut reader)
    }
}
