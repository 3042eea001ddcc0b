/**
 * Deterministic rule-based English tagger.
 *
 * Produces one token per word with a Penn Treebank POS tag and a dependency
 * label from the vocabulary downstream grammar filters consume:
 * nsubj / nsubjpass / expl for subjects, aux / auxpass for auxiliaries,
 * plus det, poss, amod, advmod, prep, pobj, dobj, attr, cc, nummod, compound,
 * punct, ROOT and the catch-all dep.
 *
 * The tagger is a closed function of the input string: no models, no state,
 * identical output for identical sentences, which is what makes golden-file
 * pinning meaningful.
 */

export interface ParseToken {
  text: string;
  pos: string;
  dep: string;
}

const WORD_RE = /[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*|[^\sA-Za-z0-9]/g;

/** Maximum words per sentence; longer inputs are a parse failure (HTTP 422). */
export const MAX_TOKENS = 512;

const DETERMINERS = new Set([
  "the", "a", "an", "this", "that", "these", "those", "each", "every",
  "some", "any", "no", "all", "both", "another",
]);
const SUBJECT_PRONOUNS = new Set(["i", "you", "he", "she", "it", "we", "they"]);
const OBJECT_PRONOUNS = new Set(["me", "him", "us", "them"]);
const POSSESSIVES = new Set(["my", "your", "his", "her", "its", "our", "their"]);
const MODALS = new Set([
  "will", "would", "can", "could", "may", "might", "shall", "should", "must",
]);
const PREPOSITIONS = new Set([
  "in", "on", "at", "of", "for", "with", "from", "by", "about", "against",
  "between", "into", "through", "during", "before", "after", "above", "below",
  "under", "over", "near", "without", "within", "upon", "across", "behind",
  "beside", "toward", "towards",
]);
const CONJUNCTIONS = new Set(["and", "or", "but", "nor", "so", "yet"]);
const ADVERBS = new Set([
  "not", "very", "too", "quite", "rather", "also", "now", "then", "here",
  "there", "never", "always", "often", "soon", "already", "again", "still",
  "just", "well",
]);
const ADJECTIVES = new Set([
  "beautiful", "red", "blue", "green", "long", "short", "high", "low", "big",
  "small", "new", "old", "good", "bad", "great", "common", "early", "late",
  "young", "important", "difficult", "easy", "strong", "weak", "happy", "sad",
]);
const SINGULAR_INDEFINITES = new Set([
  "everyone", "everybody", "someone", "somebody", "anyone", "anybody",
  "nobody", "everything", "something", "nothing",
]);

// finite forms of be / have / do
const AUX_FINITE: Record<string, string> = {
  is: "VBZ", has: "VBZ", does: "VBZ", am: "VBP",
  are: "VBP", have: "VBP", do: "VBP",
  was: "VBD", were: "VBD", had: "VBD", did: "VBD",
};
const BE_FORMS = new Set(["is", "are", "was", "were", "am", "be", "been", "being"]);

const IRREGULAR_PAST = new Set([
  "sat", "ran", "went", "said", "saw", "made", "took", "came", "gave",
  "found", "told", "left", "felt", "kept", "began", "brought", "wrote",
  "stood", "heard", "met", "paid", "sold", "won", "lost", "held", "fell",
  "rose", "grew", "knew", "drew", "threw", "spoke", "broke", "chose",
  "drove", "ate", "wore", "got", "led", "sent", "built", "spent", "meant",
  "taught", "caught", "fought", "bought", "thought", "sought", "became",
  "put", "set", "read", "sang", "swam", "flew", "rode", "struck",
]);
const IRREGULAR_PARTICIPLE = new Set([
  "gone", "seen", "done", "taken", "given", "known", "grown", "thrown",
  "broken", "chosen", "driven", "eaten", "written", "spoken", "struck",
  "been", "begun", "sung", "swum", "drunk", "worn", "torn", "born",
  "shown", "hidden", "fallen", "risen", "beaten", "frozen", "stolen",
]);
// base verbs that read as present tense after a plain subject
const BASE_VERBS = new Set([
  "agree", "bark", "know", "like", "need", "want", "work", "play", "live",
  "run", "walk", "eat", "sleep", "win", "protest", "grow", "feel", "hold",
  "keep", "move", "pay", "stand", "speak", "stay", "start", "stop", "talk",
  "turn", "wait", "watch", "believe", "think", "say", "see", "hear", "come",
  "go", "make", "take", "give", "find", "tell", "leave", "call", "help",
]);

const VERB_POS = new Set(["VBZ", "VBD", "VBP", "VB", "VBG", "VBN", "MD"]);
const NOUN_POS = new Set(["NN", "NNS", "NNP", "PRP", "EX"]);
const NOMINAL_FILLERS = new Set(["DT", "JJ", "CD", "PRP$", "NNP", "NN", "RB", "PDT"]);

export function tokenize(sentence: string): string[] {
  return sentence.match(WORD_RE) ?? [];
}

function isCapitalized(word: string): boolean {
  return /^[A-Z]/.test(word);
}

function punctTag(word: string): string | null {
  if (/^[A-Za-z0-9]/.test(word)) return null;
  if (/^[.!?]$/.test(word)) return ".";
  if (word === ",") return ",";
  if (/^[:;]$/.test(word)) return ":";
  return "SYM";
}

export function tagPos(words: string[]): string[] {
  const tags: string[] = [];
  for (let i = 0; i < words.length; i++) {
    const word = words[i];
    const lower = word.toLowerCase();
    const prev = tags.length ? tags[tags.length - 1] : "";
    const punct = punctTag(word);
    if (punct !== null) {
      tags.push(punct);
      continue;
    }
    if (/^\d+([.,]\d+)*$/.test(word)) {
      tags.push("CD");
      continue;
    }
    if (lower in AUX_FINITE) {
      tags.push(AUX_FINITE[lower]);
      continue;
    }
    if (lower === "be") { tags.push("VB"); continue; }
    if (lower === "been") { tags.push("VBN"); continue; }
    if (lower === "being") { tags.push("VBG"); continue; }
    if (MODALS.has(lower)) { tags.push("MD"); continue; }
    if (lower === "to") { tags.push("TO"); continue; }
    if (lower === "there") { tags.push("EX"); continue; }
    if (SUBJECT_PRONOUNS.has(lower) || OBJECT_PRONOUNS.has(lower)) { tags.push("PRP"); continue; }
    if (POSSESSIVES.has(lower)) { tags.push("PRP$"); continue; }
    if (DETERMINERS.has(lower)) { tags.push("DT"); continue; }
    if (PREPOSITIONS.has(lower)) { tags.push("IN"); continue; }
    if (CONJUNCTIONS.has(lower)) { tags.push("CC"); continue; }
    if (ADVERBS.has(lower)) { tags.push("RB"); continue; }
    if (ADJECTIVES.has(lower)) { tags.push("JJ"); continue; }
    if (SINGULAR_INDEFINITES.has(lower)) { tags.push("NN"); continue; }
    if (IRREGULAR_PARTICIPLE.has(lower) && (afterAux(tags) || i === 0)) {
      tags.push("VBN");
      continue;
    }
    if (IRREGULAR_PAST.has(lower)) {
      // past and participle coincide for most irregulars; auxiliaries decide
      tags.push(afterAux(tags) ? "VBN" : "VBD");
      continue;
    }
    if (IRREGULAR_PARTICIPLE.has(lower)) { tags.push("VBN"); continue; }
    if (lower.endsWith("ly") && lower.length > 3) { tags.push("RB"); continue; }
    if (lower.endsWith("ing") && lower.length > 4) {
      // nominal context ("the beginning", "any warning") vs verbal use
      tags.push(["DT", "JJ", "PRP$", "IN", "CD"].includes(prev) ? "NN" : "VBG");
      continue;
    }
    if (lower.endsWith("ed") && lower.length > 3) {
      tags.push(afterAux(tags) || i === 0 ? "VBN" : "VBD");
      continue;
    }
    if (
      lower.endsWith("s") && lower.length > 2 &&
      !lower.endsWith("ss") && !lower.endsWith("'s") && !lower.endsWith("us")
    ) {
      if (["DT", "JJ", "PRP$", "IN", "CD", "PDT"].includes(prev)) tags.push("NNS");
      else if (NOUN_POS.has(prev)) tags.push("VBZ");
      else tags.push("NNS");
      continue;
    }
    if (BASE_VERBS.has(lower) && NOUN_POS.has(prev)) { tags.push("VBP"); continue; }
    if (i > 0 && isCapitalized(word)) { tags.push("NNP"); continue; }
    tags.push("NN");
  }
  return tags;
}

/** True when one of the last two tags (skipping adverbs) is a be/have auxiliary. */
function afterAux(tags: string[]): boolean {
  for (let i = tags.length - 1, seen = 0; i >= 0 && seen < 2; i--) {
    if (tags[i] === "RB") continue;
    seen++;
    if (["VBZ", "VBP", "VBD", "VB", "VBN", "MD"].includes(tags[i])) return true;
    break;
  }
  return false;
}

function findVerbChain(tags: string[]): number[] {
  for (let i = 0; i < tags.length; i++) {
    if (!VERB_POS.has(tags[i])) continue;
    const chain = [i];
    let j = i + 1;
    while (j < tags.length && (VERB_POS.has(tags[j]) || tags[j] === "RB")) {
      if (VERB_POS.has(tags[j])) chain.push(j);
      j++;
    }
    return chain;
  }
  return [];
}

function assignDeps(words: string[], tags: string[]): string[] {
  const n = words.length;
  const deps: string[] = new Array(n).fill("dep");
  const lower = words.map((w) => w.toLowerCase());
  const unset = (i: number) => deps[i] === "dep";

  for (let i = 0; i < n; i++) {
    if ([".", ",", ":", "SYM"].includes(tags[i])) deps[i] = "punct";
  }

  const chain = findVerbChain(tags);
  const main = chain.length ? chain[chain.length - 1] : -1;
  const passive =
    main >= 0 && tags[main] === "VBN" && chain.some((i) => BE_FORMS.has(lower[i]));
  if (main >= 0) {
    deps[main] = "ROOT";
    for (const i of chain) {
      if (i === main) continue;
      deps[i] = BE_FORMS.has(lower[i]) && tags[main] === "VBN" ? "auxpass" : "aux";
    }
  }

  // subject: nearest nominal before the verb chain that is not inside a
  // prepositional phrase
  if (chain.length) {
    let i = chain[0] - 1;
    while (i >= 0) {
      if (NOUN_POS.has(tags[i])) {
        const prepIndex = governingPreposition(tags, i);
        if (prepIndex >= 0) {
          if (unset(i)) deps[i] = "pobj";
          i = prepIndex - 1;
          continue;
        }
        deps[i] = tags[i] === "EX" ? "expl" : passive ? "nsubjpass" : "nsubj";
        break;
      }
      i--;
    }
  }

  for (let i = 0; i < n; i++) {
    if (!unset(i)) continue;
    switch (tags[i]) {
      case "DT":
      case "PDT":
        if (nounAhead(tags, i, 3)) deps[i] = tags[i] === "PDT" ? "predet" : "det";
        break;
      case "PRP$":
        deps[i] = "poss";
        break;
      case "JJ":
        deps[i] = nounAhead(tags, i, 2) ? "amod" : "dep";
        break;
      case "RB":
        deps[i] = "advmod";
        break;
      case "CC":
        deps[i] = "cc";
        break;
      case "CD":
        deps[i] = "nummod";
        break;
      case "TO":
        deps[i] = i + 1 < n && VERB_POS.has(tags[i + 1]) ? "aux" : "prep";
        break;
      case "IN":
        deps[i] = "prep";
        break;
    }
  }

  // objects of prepositions
  for (let i = 0; i < n; i++) {
    if (tags[i] !== "IN" && !(tags[i] === "TO" && deps[i] === "prep")) continue;
    for (let j = i + 1; j < n; j++) {
      if (NOUN_POS.has(tags[j])) {
        if (unset(j)) deps[j] = "pobj";
        break;
      }
      if (!NOMINAL_FILLERS.has(tags[j])) break;
    }
  }

  // direct object / copular attribute after the main verb
  if (main >= 0) {
    for (let j = main + 1; j < n; j++) {
      if (NOUN_POS.has(tags[j])) {
        if (unset(j)) deps[j] = BE_FORMS.has(lower[main]) ? "attr" : "dobj";
        break;
      }
      if (!NOMINAL_FILLERS.has(tags[j])) break;
    }
  }

  // compound nouns: a bare noun directly before another noun
  for (let i = 0; i + 1 < n; i++) {
    if (unset(i) && ["NN", "NNP"].includes(tags[i]) && ["NN", "NNS", "NNP"].includes(tags[i + 1])) {
      deps[i] = "compound";
    }
  }

  // verbless sentences root at the first nominal (or the first word)
  if (main < 0 && n > 0) {
    let root = tags.findIndex((t) => NOUN_POS.has(t));
    if (root < 0) root = 0;
    if (unset(root) || deps[root] === "pobj") deps[root] = "ROOT";
  }
  return deps;
}

/** Index of the preposition governing the nominal at `i`, or -1. */
function governingPreposition(tags: string[], i: number): number {
  for (let j = i - 1; j >= 0; j--) {
    if (tags[j] === "IN") return j;
    if (!NOMINAL_FILLERS.has(tags[j])) return -1;
  }
  return -1;
}

function nounAhead(tags: string[], i: number, window: number): boolean {
  for (let j = i + 1; j <= Math.min(tags.length - 1, i + window); j++) {
    if (["NN", "NNS", "NNP"].includes(tags[j])) return true;
  }
  return false;
}

export function parseSentence(sentence: string): ParseToken[] {
  const words = tokenize(sentence);
  if (words.length > MAX_TOKENS) {
    throw new RangeError(`sentence has ${words.length} tokens (limit ${MAX_TOKENS})`);
  }
  const tags = tagPos(words);
  const deps = assignDeps(words, tags);
  return words.map((text, i) => ({ text, pos: tags[i], dep: deps[i] }));
}
