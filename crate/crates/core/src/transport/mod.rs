//! Edge↔cloud streaming: wire framing, payload codecs, timestamp
//! alignment, and the two session loops.

pub mod align;
pub mod bitpack;
pub mod cloud;
pub mod edge;
pub mod payload;
pub mod pipe;
pub mod queue;
pub mod wire;

pub use align::{align_frames, greedy_align, AlignDrops, AlignedPair, StreamAligner};
pub use bitpack::{pack_indices, packed_len, unpack_indices};
pub use cloud::{cloud_session, CloudConfig, CloudOutput, CloudStats};
pub use edge::{edge_session, EdgeConfig, EdgeStats, TransmitMode};
pub use payload::{
    decode_depth, decode_semantic, decode_sync, encode_depth, encode_semantic, encode_sync,
    SemanticContent, SemanticPayload,
};
pub use pipe::{pipe, PipeReader, PipeWriter};
pub use queue::{bounded, BoundedReceiver, BoundedSender};
pub use wire::{frame_decode, frame_encode, read_frame, FrameType, WireFrame, HEADER_LEN};
