#pragma once

#include <vector>

#include "geometry/mesh.h"

namespace talkie::synthdata {

inline constexpr int kNumPhonemes = 8;   // pseudo-phonemes 0..7
inline constexpr int kSilenceId = 8;     // dedicated silence id

// Procedural face-like open grid (~500 vertices) with a planar UV chart,
// lip/upper-face masks by region and a gently domed 3D shape. Millimetre
// scale. Fully deterministic.
geo::MeshTopology make_face_topology();

// Neutral (canonical) vertex positions for the topology above, n_v x 3 mm.
std::vector<float> face_rest_positions(const geo::MeshTopology& topo);

// Lip-region deformation basis for pseudo-phoneme k: a cosine bump around a
// phoneme-specific lip point with a phoneme-specific direction and amplitude.
// Closed form, no randomness; n_v x 3 millimetres.
std::vector<float> phoneme_basis(const geo::MeshTopology& topo, int k);

// Eyelid-closing deformation used by the blink term, n_v x 3 mm.
std::vector<float> blink_field(const geo::MeshTopology& topo);

}  // namespace talkie::synthdata
