// Copyright 2026 The regime-router Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#include "pipeline.hpp"

namespace regime::testing {

std::unique_ptr<Pipeline> build_pipeline(const SyntheticCorpusOptions& opts, const RouterConfig& cfg) {
    auto p = std::make_unique<Pipeline>();
    p->corpus = make_synthetic_corpus(opts);
    p->cfg = cfg;
    p->models.selector = train_selector(p->analyzer, p->corpus.annotations);
    p->training = train_router(p->analyzer, p->corpus.ds, p->corpus.store, p->models.selector, cfg, {}, 5);
    p->models.router = p->training.fit.full_model;
    return p;
}

}  // namespace regime::testing
