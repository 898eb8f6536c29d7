#pragma once

namespace msm {

/// Sizes of the four personalization networks.
struct NetConfig {
  int style_dim = 64;            ///< D_s
  int content_dim = 64;          ///< D_c
  int grid = 2;                  ///< l: the content embedding is an l x l grid of D_c / l^2 features
  int transformer_layers = 4;
  int heads = 4;
  int ff_dim = 128;
  int enhancer_levels = 3;
  int base_channels = 16;        ///< enhancer width at full resolution
  int embed_channels = 16;       ///< width of the style / content trunks
  int embed_input_size = 64;
  int enhancer_input_size = 128;
  unsigned long long seed = 1;   ///< weight initialization

  int token_dim() const { return style_dim + content_dim; }
  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const NetConfig&) const = default;
};

enum class StyleMode {
  Residual,  ///< s = f(y) - f(x)
  Absolute,  ///< s = f(y)
};

const char* to_string(StyleMode mode);
StyleMode style_mode_from_string(const char* name);

}  // namespace msm
