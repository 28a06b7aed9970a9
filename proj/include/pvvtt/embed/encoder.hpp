#pragma once

#include <cstdint>
#include <string_view>

#include "pvvtt/core/tensor.hpp"

namespace pvvtt {

// Joint image/text embedding space. Both modalities return vectors of dim().
class Encoder {
public:
    virtual ~Encoder() = default;
    virtual std::size_t dim() const = 0;
    virtual Tensor encode_text(std::string_view text) const = 0;
    // `frame_ref` identifies a frame (path or "<video>#<index>").
    virtual Tensor encode_image(std::string_view frame_ref) const = 0;
};

// Deterministic stand-in: the seeded hash of (modality, input) drives a
// Gaussian draw that is normalised to unit length.
class PseudoEncoder : public Encoder {
public:
    PseudoEncoder(std::uint64_t seed, std::size_t dim);

    std::size_t dim() const override { return dim_; }
    Tensor encode_text(std::string_view text) const override;
    Tensor encode_image(std::string_view frame_ref) const override;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    Tensor draw(std::string_view modality, std::string_view input) const;

    std::uint64_t seed_;
    std::size_t dim_;
};

// Throws ConfigError when no encoder is configured and ValidationError for
// empty text.
Tensor text_embed(const Encoder* encoder, std::string_view word);

} // namespace pvvtt
