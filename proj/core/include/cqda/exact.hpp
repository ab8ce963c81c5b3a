#pragma once

#include <optional>
#include <set>

#include "cqda/dnf.hpp"
#include "cqda/triple_store.hpp"

namespace cqda {

// Boolean-semantics answer set of a DNF query by graph traversal:
// conjunction = intersection over consistent variable groundings,
// disjunction = union over disjuncts, negation = exclusion within its
// conjunct. Anchors/relations resolve through `vocab` (VocabError if
// unknown). `budget` caps grounding steps (0 = unlimited; BudgetError).
std::set<EntityId> answer_exact(const TripleStore& store, const Vocab& vocab, const DnfQuery& q,
                                std::size_t budget = 0);

// Same, but gives up (nullopt) as soon as the answer set would exceed
// `max_answers`. Used by query generation to enforce the answer cap cheaply.
std::optional<std::set<EntityId>> answer_exact_capped(const TripleStore& store,
                                                      const Vocab& vocab, const DnfQuery& q,
                                                      std::size_t max_answers,
                                                      std::size_t budget = 0);

}  // namespace cqda
