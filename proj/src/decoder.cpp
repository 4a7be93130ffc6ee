#include "gfcad/decoder.hpp"

#include "gfcad/sequence_io.hpp"

namespace gfcad {

DecodeOutput decode_distributions(const GMambaModel& model, const Tensor& zhat, int valid_len) {
    check(model.initialized(), ErrorKind::Validation, "decode: model not initialized");
    check(zhat.shape().size() == 2 && zhat.cols() == model.config().d_e, ErrorKind::Numeric,
          "decode: input width does not match d_e");
    int L = zhat.rows();
    int V = model.config().vocab;

    DecodeOutput out;
    out.cmd_logits = add(matmul(zhat, model.param("dec.cmd.W")), model.param("dec.cmd.b"));
    Tensor a = silu(add(matmul(zhat, model.param("dec.args1.W")), model.param("dec.args1.b")));
    a = silu(add(matmul(a, model.param("dec.args2.W")), model.param("dec.args2.b")));
    out.arg_logits = add(matmul(a, model.param("dec.args3.W")), model.param("dec.args3.b"));

    out.cmd_probs = softmax_rows(out.cmd_logits);
    out.arg_probs = concat_cols(softmax_rows(slice_cols(out.arg_logits, 0, V)),
                                softmax_rows(slice_cols(out.arg_logits, V, 2 * V)));

    out.row_valid.assign(static_cast<std::size_t>(L), 0);
    for (int i = 0; i < L && i < valid_len; ++i) out.row_valid[static_cast<std::size_t>(i)] = 1;
    return out;
}

namespace {

int argmax_span(const std::vector<double>& v, std::size_t begin, std::size_t end) {
    std::size_t best = begin;
    for (std::size_t i = begin + 1; i < end; ++i) {
        if (v[i] > v[best]) best = i;  // strict: ties keep the lowest index
    }
    return static_cast<int>(best - begin);
}

}  // namespace

CadSequence assemble(const DecodeOutput& out) {
    int L = out.cmd_probs.rows();
    int n_cmd = out.cmd_probs.cols();
    int V = out.arg_probs.cols() / 2;
    const auto& cmd = out.cmd_probs.data();
    const auto& arg = out.arg_probs.data();

    std::vector<TokenPair> tokens(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        std::size_t crow = static_cast<std::size_t>(i) * n_cmd;
        std::size_t arow = static_cast<std::size_t>(i) * 2 * V;
        int cls = i == 0 ? static_cast<int>(TokenClass::Cls)
                         : argmax_span(cmd, crow, crow + n_cmd);
        TokenPair p;
        switch (static_cast<TokenClass>(cls)) {
            case TokenClass::Coord:
                p.a = static_cast<TokenId>(argmax_span(arg, arow, arow + V));
                p.b = static_cast<TokenId>(argmax_span(arg, arow + V, arow + 2 * V));
                break;
            case TokenClass::ExtScalar:
            case TokenClass::Beta:
                p.a = static_cast<TokenId>(argmax_span(arg, arow, arow + V));
                p.b = tok::kPad;
                break;
            default:
                p.a = structural_token_for_class(static_cast<TokenClass>(cls));
                p.b = tok::kPad;
                break;
        }
        tokens[static_cast<std::size_t>(i)] = p;
    }
    return sequence_from_tokens(std::move(tokens), L);
}

}  // namespace gfcad
