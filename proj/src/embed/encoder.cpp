#include "pvvtt/embed/encoder.hpp"

#include <cmath>
#include <string>

#include "pvvtt/core/hash.hpp"
#include "pvvtt/core/random.hpp"
#include "pvvtt/errors.hpp"

namespace pvvtt {

PseudoEncoder::PseudoEncoder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim == 0) throw ConfigError("encoder dimension must be positive");
}

Tensor PseudoEncoder::draw(std::string_view modality, std::string_view input) const {
    std::string key(modality);
    key += '\0';
    key += input;
    Rng rng(seed_, fnv1a64(key));
    Tensor v({dim_});
    double norm2 = 0.0;
    for (double& x : v.data()) {
        x = rng.normal();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v.data()) x *= inv;
    return v;
}

Tensor PseudoEncoder::encode_text(std::string_view text) const { return draw("text", text); }

Tensor PseudoEncoder::encode_image(std::string_view frame_ref) const {
    return draw("image", frame_ref);
}

Tensor text_embed(const Encoder* encoder, std::string_view word) {
    if (!encoder) throw ConfigError("no text encoder configured");
    if (word.empty()) throw ValidationError("text_embed: empty text");
    return encoder->encode_text(word);
}

} // namespace pvvtt
